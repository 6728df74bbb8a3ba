"""実験ハーネスのテストパッケージ。"""
