"""Jones-space field recovery for carrier-assisted direct-detection PDM-SSB links.

Modules follow the signal path: :mod:`txchain` -> :mod:`channel` ->
:mod:`frontend` -> :mod:`recovery` -> :mod:`dsp`, with shared containers and
signal helpers in :mod:`core` and experiment plumbing in :mod:`jsfr.harness`.
"""

__version__ = "0.1.0"
