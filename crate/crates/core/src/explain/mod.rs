//! Hard-prompt construction from selected evidence and explanation generation.

pub mod generate;
pub mod prompt;

pub use generate::{
    DecodingParams, GenerationRequest, GenerationResponse, Generator, HttpGenerator, StubGenerator, GENERIC_EXPLANATION,
};
pub use prompt::{
    assemble_prompt, history_text, parse_evidence, parse_line, render_path, serialize_paths, EvidenceLine, PromptBundle,
    DEFAULT_INSTRUCTION,
};
