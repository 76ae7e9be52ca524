#ifndef COVEX_TOOLS_APP_HPP
#define COVEX_TOOLS_APP_HPP

namespace covex::cli {

// Exit codes: 0 ok, 1 unexpected, 2 config/usage, 3 data, 4 model.
int run_cli(int argc, char** argv);

}  // namespace covex::cli

#endif  // COVEX_TOOLS_APP_HPP
