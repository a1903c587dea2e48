#pragma once

namespace partfuse {

/// Entry point of the `partfuse` binary. Returns 0 on success, 2 on I/O
/// errors and 3 on validation or usage errors.
int run_cli(int argc, const char* const* argv);

}  // namespace partfuse
