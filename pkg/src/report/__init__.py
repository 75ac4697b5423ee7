#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Markdown レポート生成
"""

from src.report.report_generator import ReportGenerator

__all__ = ['ReportGenerator']
