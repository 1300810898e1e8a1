// Acceptance suite: one pass/fail line per criterion.
#include <cstdio>

int main() {
    std::printf("placeholder\n");
    return 0;
}
