#include <vector>

#include "memefuse/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return memefuse::run_cli(std::move(args));
}
