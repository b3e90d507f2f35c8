#include <vector>

#include "timberdiff/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return timberdiff::cli::run(args);
}
