use std::path::Path;

use eiot_core::fixtures::{generate, FixtureProfile};

use crate::args::{ProfileArg, SynthArgs};
use crate::output::Output;
use crate::{Failure, Outcome};

pub fn run(dir: &Path, args: &SynthArgs) -> Outcome {
    if args.scale == 0 {
        return Err(Failure::Usage("--scale must be positive".into()));
    }
    let profile = match args.profile {
        ProfileArg::Mobility => FixtureProfile::Mobility,
        ProfileArg::Traffic => FixtureProfile::Traffic,
        ProfileArg::Full => FixtureProfile::Full,
    };
    let out = Output::new(dir, "synth", args, Some(args.seed))?;
    let fixture = generate(profile, args.scale, args.seed)?;
    for p in fixture.write(dir)? {
        let name = p.file_name().and_then(|n| n.to_str()).expect("fixture file names are UTF-8");
        out.adopt(name)?;
        log::info!("wrote {}", p.display());
    }
    Ok(())
}
