"""評価のテストパッケージ。"""
