"""prontrain: pronunciation-training engine.

Scores how native-like an utterance sounds, highlights where on the
waveform it diverges from native speech, and places the learner and a
native anchor as two points in a 2-D plane.
"""

__version__ = "0.1.0"
