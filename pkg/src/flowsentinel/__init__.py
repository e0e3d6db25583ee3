"""flowsentinel: lightweight CNN/LSTM intrusion detection for IoT flow records."""

__version__ = "0.1.0"
