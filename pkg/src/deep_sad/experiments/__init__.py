"""シナリオグリッド・ベンチマーク・トイデモの実験手順。"""
