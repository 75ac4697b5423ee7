#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
物理層モデルパッケージ

チャネル、ASIM、レート、電力、最適化問題の評価を提供する。
"""
