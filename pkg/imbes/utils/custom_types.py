from typing import TypedDict


class Config(TypedDict):
    frames: str
    depth: int
    modal_uses: int
    fresh: int
    pool_extra: int
    format: str
    seed: int
    emit_base: str | None
    emit_proof: str | None


class ReportRow(TypedDict):
    id: str
    status: str
    details: str
