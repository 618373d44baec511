#include <string>
#include <vector>

#include "sandhi/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sandhi::cli::run(std::move(args));
}
