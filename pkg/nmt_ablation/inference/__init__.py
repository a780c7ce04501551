from .decode_funcs import DecodeConfig, ForcedDecoding, Hypothesis, beam_search, forced_decode, greedy_decode
from .attention_io import read_attention_dump, write_attention_dump
from .inference import app
