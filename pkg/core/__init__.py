"""Solver core: grids, window checks, min-plus transfer matrices and queries"""
