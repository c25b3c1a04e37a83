// placeholder entry point; the subcommand dispatch lands with the config module
int main() { return 0; }
