"""Index bundles: the binary container plus a meta file tying it to its
collection and encoder artifacts.

``build-index`` writes ``<out>`` (the container), the encoder files it
depends on, and ``<out>.meta.json`` with relative paths, so ``search``,
``eval`` and ``serve`` can reconstruct the full search engine from one
path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import SnippetCollection, load_collection
from .embed import compute_idf, load_idf, load_table, save_idf
from .encoders import (
    Encoder,
    NbowEncoder,
    NcsEncoder,
    UnifEncoder,
    import_external_embeddings,
    load_unif_params,
)
from .errors import DataError
from .index import EnsembleSpec, SnippetIndex, build_index, load_index, save_index


@dataclass
class EncoderSpec:
    """Parsed ``kind:path`` encoder selector from the CLI."""

    kind: str
    path: Path | None

    @classmethod
    def parse(cls, text: str) -> "EncoderSpec":
        if text == "none":
            return cls(kind="none", path=None)
        kind, sep, path = text.partition(":")
        if not sep or not path or kind not in ("nbow", "ncs", "unif", "external"):
            raise DataError(
                f"bad encoder spec {text!r}; expected none or "
                "nbow:PATH | ncs:PATH | unif:PATH | external:PATH"
            )
        return cls(kind=kind, path=Path(path))


def _portable(path: Path, base: Path) -> str:
    """Path relative to the bundle directory when possible, else absolute."""
    resolved = path.resolve()
    try:
        return str(resolved.relative_to(base.resolve()))
    except ValueError:
        return str(resolved)


def _build_encoder(
    spec: EncoderSpec, collection: SnippetCollection, out_dir: Path, side: str
) -> tuple[Encoder | None, dict | None]:
    """Instantiate an encoder and its meta descriptor (relative paths)."""
    if spec.kind == "none":
        return None, None
    if spec.kind == "nbow":
        encoder: Encoder = NbowEncoder(table=load_table(spec.path))
        return encoder, {"kind": "nbow", "table": _portable(spec.path, out_dir)}
    if spec.kind == "external":
        return import_external_embeddings(spec.path), {
            "kind": "external",
            "vectors": _portable(spec.path, out_dir),
        }
    if spec.kind == "ncs":
        idf = compute_idf(collection)
        idf_path = out_dir / f"{side}.idf.json"
        save_idf(idf, idf_path)
        return NcsEncoder(table=load_table(spec.path), idf=idf), {
            "kind": "ncs",
            "table": _portable(spec.path, out_dir),
            "idf": idf_path.name,
        }
    if spec.kind == "unif":
        return UnifEncoder(params=load_unif_params(spec.path)), {
            "kind": "unif",
            "params": _portable(spec.path, out_dir),
        }
    raise DataError(f"unknown encoder kind {spec.kind!r}")


def _load_encoder(descriptor: dict | None, base: Path) -> Encoder | None:
    if descriptor is None:
        return None
    kind = descriptor.get("kind")
    if kind == "nbow":
        return NbowEncoder(table=load_table(base / descriptor["table"]))
    if kind == "external":
        return import_external_embeddings(base / descriptor["vectors"])
    if kind == "ncs":
        return NcsEncoder(
            table=load_table(base / descriptor["table"]),
            idf=load_idf(base / descriptor["idf"]),
        )
    if kind == "unif":
        return UnifEncoder(params=load_unif_params(base / descriptor["params"]))
    raise DataError(f"bundle references unknown encoder kind {kind!r}")


def save_bundle(
    index: SnippetIndex,
    out_path: str | Path,
    collection_path: str | Path,
    desc_descriptor: dict | None,
    code_descriptor: dict | None,
) -> None:
    out_path = Path(out_path)
    save_index(index, out_path)
    meta = {
        "collection": str(Path(collection_path).resolve()),
        "desc_encoder": desc_descriptor,
        "code_encoder": code_descriptor,
    }
    out_path.with_name(out_path.name + ".meta.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )


def build_bundle(
    collection_path: str | Path,
    desc_spec: str,
    code_spec: str,
    lambda_desc: float,
    lambda_code: float,
    out_path: str | Path,
) -> SnippetIndex:
    """CLI back end for ``build-index``: assemble, build, persist."""
    out_path = Path(out_path)
    collection = load_collection(collection_path)
    desc_encoder, desc_meta = _build_encoder(
        EncoderSpec.parse(desc_spec), collection, out_path.parent, f"{out_path.name}.desc"
    )
    code_encoder, code_meta = _build_encoder(
        EncoderSpec.parse(code_spec), collection, out_path.parent, f"{out_path.name}.code"
    )
    spec = EnsembleSpec(
        lambda_desc=lambda_desc,
        lambda_code=lambda_code,
        desc_encoder=desc_encoder,
        code_encoder=code_encoder,
    )
    index = build_index(collection, spec)
    save_bundle(index, out_path, collection_path, desc_meta, code_meta)
    return index


def load_bundle(index_path: str | Path) -> tuple[SnippetIndex, SnippetCollection]:
    """Load a container plus its meta, collection, and encoders."""
    index_path = Path(index_path)
    meta_path = index_path.with_name(index_path.name + ".meta.json")
    if not meta_path.exists():
        raise DataError(f"{meta_path}: bundle meta file not found")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{meta_path}: malformed bundle meta: {exc.msg}") from exc
    base = index_path.parent
    desc_encoder = _load_encoder(meta.get("desc_encoder"), base)
    code_encoder = _load_encoder(meta.get("code_encoder"), base)
    index = load_index(index_path, desc_encoder, code_encoder)
    collection = load_collection(meta["collection"])
    return index, collection
