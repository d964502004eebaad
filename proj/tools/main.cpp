#include <string>
#include <vector>

#include "cstrack/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cstrack::run_cli(args);
}
