#pragma once

// Command-line front end.
//
//   iml <simulate|moments|constants|rate|ldp-check|stable|plot>
//       --config <path> [--workers N] [--out DIR]
//
// Each subcommand loads a TOML config, enforces the admissibility gate for
// its process class, runs the matching module, and writes artifacts into
// --out: a CSV table plus a JSON sidecar holding the fully resolved config
// and its hash (the hash also suffixes every file name, so runs with
// different configs never overwrite each other).  `plot` re-renders a
// produced CSV as an SVG line plot.
//
// The environment variable IML_SEED, when set, replaces run.seed before the
// config is hashed.  --workers only changes scheduling, never values.
//
// Exit status: 0 success; 1 malformed config, unreadable input, or any
// runtime failure; 2 admissibility violation (diagnostic names the violated
// inequality on stderr).

namespace iml {

int run_cli(int argc, const char* const* argv);

}  // namespace iml
