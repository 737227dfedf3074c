#include <cstdio>
int main() { std::puts("msmseg cli placeholder"); return 0; }
