"""データモジュールテストパッケージ。"""
