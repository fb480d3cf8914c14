//! `rxo` — shell and script runner for the object-relational engine.

mod format;
mod session;

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::format::OutputMode;
use crate::session::Session;

#[derive(Parser)]
#[command(
    name = "rxo",
    about = "Object-relational engine shell: runs object-language and raw machine commands"
)]
struct Args {
    /// Database directory; loaded when it exists, saved back on clean exit.
    /// Defaults to RXO_DB when set.
    #[arg(long, env = "RXO_DB")]
    db: Option<PathBuf>,

    /// Script files to run in order.
    #[arg(long)]
    script: Vec<PathBuf>,

    /// Commands to run after the scripts.
    #[arg(long)]
    exec: Vec<String>,

    /// Tab-separated output instead of aligned tables.
    #[arg(long)]
    tabs: bool,

    /// Echo each command before executing it.
    #[arg(long)]
    echo: bool,

    /// Keep executing after an error.
    #[arg(long)]
    keep_going: bool,
}

fn main() {
    let args = Args::parse();
    let mut session = match Session::new(args.db.clone()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    session.mode = if args.tabs {
        OutputMode::Tabs
    } else {
        OutputMode::Aligned
    };
    session.echo = args.echo;
    session.keep_going = args.keep_going;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();

    let batch = !args.script.is_empty() || !args.exec.is_empty();
    for path in &args.script {
        if !session.run_script(path, &mut out) && !session.keep_going {
            break;
        }
    }
    if session.errors == 0 || session.keep_going {
        for text in &args.exec {
            if !session.execute_text(text, &mut out) && !session.keep_going {
                break;
            }
        }
    }
    if !batch {
        let stdin = std::io::stdin();
        let mut input = stdin.lock();
        session.repl(&mut input, &mut out);
    }
    // a configured database directory persists on clean exit
    if session.errors == 0 {
        if let Some(dir) = session.db_path.clone() {
            if let Err(e) = session.engine.save(&dir) {
                eprintln!("error: saving {}: {e}", dir.display());
                std::process::exit(2);
            }
        }
    }
    let _ = out.flush();
    std::process::exit(if session.errors == 0 { 0 } else { 1 });
}
