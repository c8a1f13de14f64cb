"""Closed-loop personalized learning workflow engine.

Plan generation from goal, time, pace, and path preferences, transcript-grounded
in-session assistance with progressive disclosure, formative quizzes, and
learner-controlled plan adaptation with undo.
"""

__version__ = "0.1.0"
