"""prepdiag: parse short English/Arabic locative sentences, saturate them
against meaning postulates, and explain preposition choices abductively."""

__version__ = "0.1.0"
