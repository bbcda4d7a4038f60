#pragma once

namespace ppjudge {

/// Top-level command dispatcher (synth / train / eval / score / keyframes /
/// heatmap). Returns the process exit code; every failure prints one
/// "error: <kind>: <message>" line on stderr.
int run_cli(int argc, char** argv);

}  // namespace ppjudge
