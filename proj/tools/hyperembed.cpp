// Placeholder main; the CLI is assembled once the library modules are in.
int main() { return 0; }
