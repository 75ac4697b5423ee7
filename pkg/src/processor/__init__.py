#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
スイープ結果の集計と傾向検査
"""

from src.processor.sweep_processor import (
    AuditResult,
    SweepProcessor,
    audit_ee_diminishing,
    audit_se_non_decreasing,
    audit_surface_ordering,
    sweep_audits,
)

__all__ = [
    'AuditResult',
    'SweepProcessor',
    'audit_ee_diminishing',
    'audit_se_non_decreasing',
    'audit_surface_ordering',
    'sweep_audits',
]
