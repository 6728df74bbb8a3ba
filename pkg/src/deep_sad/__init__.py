"""深層半教師あり異常検知ツール"""

__version__ = "0.1.0"
