#include "mlat/cli.hpp"

int main(int argc, char** argv)
{
    return mlat::run_cli(argc, argv);
}
