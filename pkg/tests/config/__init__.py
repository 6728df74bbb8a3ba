"""設定テストパッケージ。"""
