//! The object layer: source language AST and parser, class catalog, and the
//! translator that compiles object commands into machine commands.

pub mod ast;
pub mod catalog;
pub mod parser;
pub mod translator;
