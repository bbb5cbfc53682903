"""Log-volatility and correlation filters."""
