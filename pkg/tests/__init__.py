"""Testes para o cs-fallwatch."""
