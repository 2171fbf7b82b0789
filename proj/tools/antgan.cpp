#include <vector>

#include "antgan/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return antgan::run_cli(args);
}
