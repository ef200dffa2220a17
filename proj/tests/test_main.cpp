#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <string>
#include <vector>

std::string g_cli_path; // set by --cli-path=..., used by the CLI tests

int main(int argc, char **argv) {
    std::vector<char *> pass_through;
    for (int i = 0; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg.rfind("--cli-path=", 0) == 0) {
            g_cli_path = arg.substr(11);
            continue;
        }
        pass_through.push_back(argv[i]);
    }
    doctest::Context context(static_cast<int>(pass_through.size()),
                             pass_through.data());
    return context.run();
}
