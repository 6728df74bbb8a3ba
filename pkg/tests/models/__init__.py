"""モデルと学習のテストパッケージ。"""
