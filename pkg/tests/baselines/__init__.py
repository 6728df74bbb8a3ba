"""浅いベースラインのテストパッケージ。"""
