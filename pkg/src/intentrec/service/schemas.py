from pydantic import BaseModel, Field


class Intent(BaseModel):
    name: str
    args: list[str]
    start: int
    end: int


class DiagnosticOut(BaseModel):
    severity: str
    message: str
    schema_id: int | None = None


class KBRequest(BaseModel):
    kb: str = Field(description="knowledge base source text")


class ValidateResponse(BaseModel):
    ok: bool
    diagnostics: list[DiagnosticOut]


class ExplainRequest(KBRequest):
    demo: str = Field(description="transcript source text")
    check: bool = False


class ExplainResponse(BaseModel):
    intents: list[Intent]
    sexp: str
    cardinality: int
    oracle_min: int | None = None
    valid: bool | None = None


class OracleRequest(KBRequest):
    demo: str
    limit: int = Field(default=1000, ge=1)
    max_length: int = Field(default=20, ge=1)


class OracleResponse(BaseModel):
    actions: int
    covers: list[list[Intent]]
    truncated: bool
    min_cardinality: int | None
    engine_cardinality: int
    valid: bool


class SessionCreate(KBRequest):
    init: str = Field(default="", description="an (init ...) form, may be empty")


class SessionInfo(BaseModel):
    session_id: str
    steps: int


class StepIn(BaseModel):
    action: str
    args: list[str] = []
    changes: list[tuple[str, str, str]] = []


class GenRequest(KBRequest):
    seed: int
    n_top: int = Field(ge=0)
    world: str | None = None
    max_rejections: int = Field(default=100, ge=1)


class GenResponse(BaseModel):
    demo: str
    ground_truth: str
    steps: int
