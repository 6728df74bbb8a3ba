"""ニューラルネットワークエンジンのテストパッケージ。"""
