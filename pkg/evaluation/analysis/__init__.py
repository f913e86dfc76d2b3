"""Verdict Agreement Analysis Module"""
