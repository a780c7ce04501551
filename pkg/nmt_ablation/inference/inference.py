import logging
from pathlib import Path
from typing import Optional

import typer
from rich.progress import track

from nmt_ablation.config import optional_config, resolve_option
from nmt_ablation.data import encode_sentence, read_lines, read_parallel
from nmt_ablation.errors import DataError, handle_errors
from nmt_ablation.model import Checkpoint
from nmt_ablation.subword import DEFAULT_MARKER, restore_words
from .attention_io import write_attention_dump
from .decode_funcs import DecodeConfig, beam_search, forced_decode


log = logging.getLogger(__name__)
app = typer.Typer()


@app.command(help="Translate a BPE-segmented source file with beam search")
@handle_errors
def translate(
    checkpoint: Path = typer.Option(..., help="trained checkpoint"),
    input: Optional[Path] = typer.Option(None, help="source sentences, one per line [default: config test_source]"),
    output: Path = typer.Option(..., help="translations, one per line"),
    config: Optional[Path] = typer.Option(None, help="experiment config providing test_source and beam/max_output_len/length_penalty"),
    beam: Optional[int] = typer.Option(None, help="beam size (overrides the config)"),
    keep_bpe: bool = typer.Option(False, help="write subwords instead of merged words"),
    marker: Optional[str] = typer.Option(None, help=f"BPE continuation marker [default: config marker, else {DEFAULT_MARKER}]"),
) -> None:
    """Beam-search translation. Output subwords are merged back into words unless `--keep-bpe`."""
    cfg = optional_config(config)
    input = resolve_option(input, cfg, "test_source")
    marker = resolve_option(marker, cfg, "marker", DEFAULT_MARKER)
    decode = cfg.decode_config() if cfg is not None else DecodeConfig()
    if beam is not None:
        decode = DecodeConfig(**{**decode.dict(), "beam": beam})

    ckpt = Checkpoint.load(checkpoint)
    model = ckpt.build_model()
    sources = read_lines(input)

    forced = 0
    with open(output, "w", encoding="utf-8") as fp:
        for line in track(sources, description="Translating..."):
            src_ids = encode_sentence(ckpt.vocab, line.split())
            if not src_ids:
                fp.write("\n")
                continue
            hyp = beam_search(model, src_ids, decode.beam, decode.max_output_len, decode.length_penalty)
            forced += hyp.forced
            subwords = ckpt.vocab.decode(hyp.output)
            words = subwords if keep_bpe else restore_words(subwords, marker)[0]
            fp.write(" ".join(words) + "\n")
    if forced:
        log.warning("%d of %d translations hit the length limit", forced, len(sources))
    typer.echo(f"translated {len(sources)} sentences -> {output}")


@app.command("force-align", help="Force-decode references and dump the attention over the source")
@handle_errors
def force_align(
    checkpoint: Path = typer.Option(..., help="trained checkpoint"),
    source: Optional[Path] = typer.Option(None, help="BPE-segmented source sentences [default: config test_source]"),
    target: Optional[Path] = typer.Option(None, help="BPE-segmented reference translations [default: config test_target]"),
    output: Path = typer.Option(..., help="attention dump to write"),
    config: Optional[Path] = typer.Option(None, help="experiment config providing test_source/test_target"),
) -> None:
    """Forced decoding of every (source, reference) pair.

    Records are written to the attention dump with 0-based sentence ids.
    Models without attention produce records with zero layers.
    """
    cfg = optional_config(config)
    source, target = resolve_option(source, cfg, "test_source"), resolve_option(target, cfg, "test_target")
    ckpt = Checkpoint.load(checkpoint)
    model = ckpt.build_model()
    pairs = read_parallel(source, target)

    def records():
        for i, (src, tgt) in enumerate(track(pairs, description="Forced decoding...")):
            if not src or not tgt:
                raise DataError(f"sentence pair {i} has an empty side")
            result = forced_decode(model, encode_sentence(ckpt.vocab, src), encode_sentence(ckpt.vocab, tgt))
            yield str(i), result.record

    write_attention_dump(output, records())
    typer.echo(f"wrote attention of {len(pairs)} sentence pairs -> {output}")
