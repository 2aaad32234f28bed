"""
Class labels shared by every detector.
"""


import enum


@enum.unique
class Label(enum.IntEnum):
    """
    Represents the output classes of a detector.
    """

    FAKE = 0
    REAL = 1
