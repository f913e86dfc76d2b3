"""Verdict Evaluation Module"""
