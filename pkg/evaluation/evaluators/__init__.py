"""Numerical Oracle Evaluators Module"""
