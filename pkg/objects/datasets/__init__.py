# This file is intentionally empty to mark the directory as a Python package 