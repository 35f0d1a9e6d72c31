"""Testes para cli.py (parser, subcomandos e códigos de saída)."""

import csv
import logging
import os

import pytest

from cs_fallwatch import cli
from cs_fallwatch.errors import ConfigError
from cs_fallwatch.frames import load_pgm, save_pgm
from cs_fallwatch.sensing import read_packets
from tests.conftest import lying_block, scene, upright_block

SIZE = 16


@pytest.fixture(autouse=True)
def _isolate(mocker, monkeypatch):
    """Sem .env real e sem variáveis CSFW_* herdadas."""
    mocker.patch("cs_fallwatch.cli.load_dotenv")
    for name in list(os.environ):
        if name.startswith("CSFW_"):
            monkeypatch.delenv(name)


@pytest.fixture
def frames_dir(write_frames):
    """Sequência 16×16: dois frames vazios e três com objeto."""
    frames = [scene(SIZE)] * 2 + [scene(SIZE, (4 + k, 4, 6, 3)) for k in range(3)]
    return write_frames(frames, "frames")


def _common(out) -> list[str]:
    return [
        "--frame-size", str(SIZE),
        "--payload", "16",
        "--calibration-frames", "2",
        "--max-iter", "3",
        "--denoiser", "median",
        "--output-dir", str(out),
    ]


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


class TestParser:
    """Testes para build_parser()/parse_args()."""

    def test_should_expose_every_config_key_as_flag(self):
        """Deve aceitar uma flag por chave de configuração."""
        args = cli.parse_args(["pipeline", "--input", "x", "--sub-rate", "0.3", "--tau-policy", "fixed"])
        assert args.sub_rate == "0.3"
        assert args.tau_policy == "fixed"
        assert args.denoiser is None

    def test_reconstruct_all_should_be_a_switch(self):
        """Deve tratar --reconstruct-all como flag sem valor."""
        args = cli.parse_args(["pipeline", "--input", "x", "--reconstruct-all"])
        assert args.reconstruct_all == "true"
        assert cli.config_from_args(args).reconstruct_all is True

    def test_sweep_lists_should_be_parsed(self):
        """Deve converter listas separadas por vírgula."""
        args = cli.parse_args(
            ["sweep", "--input", "x", "--sub-rates", "0.25,0.5", "--denoisers", "tv, nlm"]
        )
        assert args.sub_rates == [0.25, 0.5]
        assert args.denoisers == ["tv", "nlm"]
        assert args.omega_grid is None

    def test_verbose_and_quiet_should_be_exclusive(self):
        """Deve rejeitar -v e -q juntos."""
        with pytest.raises(SystemExit):
            cli.parse_args(["-v", "-q", "pipeline", "--input", "x"])

    def test_flags_should_override_config_file(self, tmp_path):
        """Deve aplicar flags por cima do arquivo --config."""
        conf = tmp_path / "run.conf"
        conf.write_text("sub_rate=0.25\ndenoiser=nlm\n", encoding="utf-8")
        args = cli.parse_args(["pipeline", "--input", "x", "--config", str(conf), "--sub-rate", "0.75"])
        cfg = cli.config_from_args(args)
        assert cfg.sub_rate == 0.75
        assert cfg.denoiser.kind == "nlm"


class TestFormatError:
    def test_should_be_single_line_with_code(self):
        """Deve gerar uma única linha com code e mensagem."""
        line = cli.format_error(ConfigError("valor\n  inválido"))
        assert line == "error code=config.error message=valor inválido"


class TestExitCodes:
    """Testes para os códigos de saída de main()."""

    async def test_no_command_should_return_2(self):
        """Deve retornar 2 sem subcomando."""
        assert await cli.main([]) == 2

    async def test_config_error_should_return_2(self, tmp_path, frames_dir, capsys):
        """Deve retornar 2 e emitir a linha de erro para configuração inválida."""
        code = await cli.main(["-q", "pipeline", "--input", str(frames_dir), "--sub-rate", "2"])
        assert code == 2
        assert "error code=config.error" in capsys.readouterr().err

    async def test_unknown_key_in_config_file_should_return_2(self, tmp_path, frames_dir, capsys):
        """Deve rejeitar chaves desconhecidas no arquivo de configuração."""
        conf = tmp_path / "bad.conf"
        conf.write_text("subrate=0.5\n", encoding="utf-8")
        code = await cli.main(["-q", "pipeline", "--input", str(frames_dir), "--config", str(conf)])
        assert code == 2
        assert "subrate" in capsys.readouterr().err

    async def test_domain_error_should_return_1(self, tmp_path, capsys):
        """Deve retornar 1 com o code do erro de domínio."""
        code = await cli.main(["-q", "pipeline", "--input", str(tmp_path / "nope")])
        assert code == 1
        err = capsys.readouterr().err.strip().splitlines()
        assert err[-1].startswith("error code=pgm.missing_file message=")

    async def test_missing_model_path_should_be_config_error(self, tmp_path, frames_dir):
        """Deve exigir --model-path para classificar."""
        background = tmp_path / "bg.pgm"
        save_pgm(scene(SIZE), background)
        code = await cli.main(
            ["-q", "classify", "--input", str(frames_dir), "--background", str(background)]
        )
        assert code == 2

    async def test_unexpected_exception_should_return_1(self, mocker, frames_dir):
        """Deve capturar exceções inesperadas e retornar 1."""
        mocker.patch.dict(cli.COMMANDS, {"pipeline": mocker.AsyncMock(side_effect=RuntimeError("boom"))})
        assert await cli.main(["-q", "pipeline", "--input", str(frames_dir)]) == 1

    async def test_interactive_flag_should_open_menu(self, mocker):
        """Deve delegar ao modo interativo com -i."""
        menu = mocker.patch("cs_fallwatch.cli.interactive_main", new=mocker.AsyncMock())
        assert await cli.main(["-i"]) == 0
        menu.assert_awaited_once()


class TestEncodeChannelDecode:
    """Fluxo separado nó sensor → canal → decoder."""

    async def test_roundtrip_should_reconstruct_flagged_frames(self, tmp_path, frames_dir):
        """Deve gerar stream, aplicar o canal e reconstruir só os frames marcados."""
        out = tmp_path / "out"
        assert await cli.main(["-q", "encode", "--input", str(frames_dir), *_common(out)]) == 0

        packets = read_packets(out / "packets.bin")
        assert {p.frame_id for p in packets} == {0, 1, 2, 3, 4}
        flags = [row["flag"] for row in _read_csv(out / "detection.csv")]
        assert flags == ["0", "0", "1", "1", "1"]

        received = tmp_path / "received.bin"
        code = await cli.main(
            ["-q", "channel", "--packets", str(out / "packets.bin"), "--out", str(received),
             *_common(out), "--drop-packets", "0"]
        )
        assert code == 0
        assert len(read_packets(received)) == len(packets) - 5

        code = await cli.main(
            ["-q", "decode", "--packets", str(received), "--ground-truth", str(frames_dir),
             "--detection", str(out / "detection.csv"), *_common(out)]
        )
        assert code == 0
        rows = _read_csv(out / "decode.csv")
        assert [row["frame_id"] for row in rows] == ["2", "3", "4"]
        assert all(row["psnr_db"] for row in rows)
        assert load_pgm(out / "recon" / "frame_0003.pgm").dims == (SIZE, SIZE)
        assert (out / "traces" / "frame_0004.csv").exists()

    async def test_detect_should_score_received_stream(self, tmp_path, frames_dir):
        """Deve recalcular detection.csv a partir do stream."""
        out = tmp_path / "out"
        await cli.main(["-q", "encode", "--input", str(frames_dir), *_common(out)])
        (out / "detection.csv").unlink()

        code = await cli.main(["-q", "detect", "--packets", str(out / "packets.bin"), *_common(out)])

        assert code == 0
        assert [row["flag"] for row in _read_csv(out / "detection.csv")] == ["0", "0", "1", "1", "1"]


class TestClassifierCommands:
    async def test_train_then_classify(self, tmp_path, write_frames):
        """Deve treinar o modelo e rotular frames (NoObject para frames vazios)."""
        fall = write_frames([scene(32, lying_block(32, k)) for k in range(6)], "fall")
        nofall = write_frames([scene(32, upright_block(32, k)) for k in range(6)], "nofall")
        background = tmp_path / "bg.pgm"
        save_pgm(scene(32), background)
        model = tmp_path / "model.txt"
        common = ["--frame-size", "32", "--model-path", str(model), "--output-dir", str(tmp_path / "out")]

        code = await cli.main(
            ["-q", "train-classifier", "--fall", str(fall), "--nofall", str(nofall),
             "--background", str(background), *common]
        )
        assert code == 0
        assert model.exists()

        targets = write_frames([scene(32), scene(32, lying_block(32, 2)), scene(32, upright_block(32, 1))], "targets")
        code = await cli.main(
            ["-q", "classify", "--input", str(targets), "--background", str(background), *common]
        )
        assert code == 0
        decisions = [row["decision"] for row in _read_csv(tmp_path / "out" / "labels.csv")]
        assert decisions == ["NoObject", "Fall", "NoFall"]


class TestExperimentCommands:
    async def test_pipeline_command_should_write_report(self, tmp_path, frames_dir):
        """Deve executar o pipeline completo pela CLI."""
        out = tmp_path / "out"
        assert await cli.main(["-q", "pipeline", "--input", str(frames_dir), *_common(out)]) == 0
        rows = _read_csv(out / "report.csv")
        assert len(rows) == 5
        assert [row["iterations"] != "" for row in rows] == [False, False, True, True, True]

    async def test_sweep_command_should_write_grid(self, tmp_path, frames_dir):
        """Deve gravar uma linha por ponto da grade."""
        out = tmp_path / "out"
        code = await cli.main(
            ["-q", "sweep", "--input", str(frames_dir), "--sub-rates", "0.5,1.0",
             "--denoisers", "identity", *_common(out)]
        )
        assert code == 0
        assert len(_read_csv(out / "sweep.csv")) == 2

    async def test_denoise_demo_command(self, tmp_path, frames_dir):
        """Deve gravar denoise_demo.csv com σ × denoiser linhas."""
        out = tmp_path / "out"
        code = await cli.main(
            ["-q", "denoise-demo", "--input", str(frames_dir), "--sigmas", "5,10",
             "--denoisers", "identity,median", *_common(out)]
        )
        assert code == 0
        assert len(_read_csv(out / "denoise_demo.csv")) == 4


class TestLogging:
    def test_verbose_should_enable_debug(self):
        """Deve usar DEBUG com -v."""
        cli.configure_logging(cli.parse_args(["-v", "pipeline", "--input", "x"]))
        assert logging.getLogger().level == logging.DEBUG

    def test_quiet_should_only_show_warnings(self):
        """Deve usar WARNING com -q."""
        cli.configure_logging(cli.parse_args(["-q", "pipeline", "--input", "x"]))
        assert logging.getLogger().level == logging.WARNING
