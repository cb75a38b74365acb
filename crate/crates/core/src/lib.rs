pub mod geometry;
mod gjk;
pub mod scene;
pub mod fitting;
pub mod transcript;
pub mod gesture;
pub mod extraction;
pub mod functions;
pub mod intent;
pub mod pipeline;
pub mod synth;
pub mod eval;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scenes.md")]
    mod scenes {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/gestures.md")]
    mod gestures {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
