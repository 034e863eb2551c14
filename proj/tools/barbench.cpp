#include <string>
#include <vector>

#include "barbench/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return barbench::cli::run_command(args);
}
