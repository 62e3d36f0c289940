#ifndef CLAB_CLI_HPP
#define CLAB_CLI_HPP

namespace clab {

// Full command-line front end: subcommand dispatch, config loading with
// dotted overrides and the seed environment variable, artifact writing.
// Returns the process exit code: 0 = pass, 1 = error, 2 = a checked
// assertion failed.
int cli_main(int argc, const char* const* argv);

}  // namespace clab

#endif
