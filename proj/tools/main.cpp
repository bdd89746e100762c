#include <iostream>

int main() {
    std::cout << "dynmf\n";
    return 0;
}
