#pragma once

#include <string>

#include "ppjudge/optim.hpp"
#include "ppjudge/params.hpp"

namespace ppjudge {

/// Binary checkpoint holding every parameter tensor bit-exactly, plus (when
/// given) the optimizer moments and step so training can resume on the exact
/// trajectory it left. Entries are written in sorted name order, so files for
/// identical states are byte-identical.
void save_checkpoint(const std::string& path, const ParamStore& params,
                     const OptimizerState* opt = nullptr);

/// Loads values into an already-constructed ParamStore. The store must
/// contain exactly the parameters named in the file, with matching shapes.
/// If `opt` is non-null the file must carry optimizer state.
void load_checkpoint(const std::string& path, ParamStore& params,
                     OptimizerState* opt = nullptr);

}  // namespace ppjudge
