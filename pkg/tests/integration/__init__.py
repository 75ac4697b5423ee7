#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
ASIM LEO 衛星ワークベンチの統合テスト
"""
