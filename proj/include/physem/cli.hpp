#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace physem {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;     // bad arguments or bad input
inline constexpr int kExitInternal = 2;  // anything else

/// Entry point of the `physem` command. `args` excludes the program name.
///
///   physem analyze IMAGE [--out FILE] [segmentation flags]
///   physem annotate APPEARANCE --ontology FILE [--out FILE] [--exclusive]
///   physem teach APPEARANCE REGION LABEL --ontology FILE [--level K] [--intensity-half-width H] [--size-factor F]
///   physem serve [--listen HOST:PORT] [--data DIR]
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace physem
