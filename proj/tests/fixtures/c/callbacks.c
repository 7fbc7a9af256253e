#include <stddef.h>

typedef int (*cmp_fn)(const void *, const void *);

static void swap(char *a, char *b, size_t n)
{
    while (n--) {
        char t = *a;
        *a++ = *b;
        *b++ = t;
    }
}

void insertion_sort(void *base, size_t count, size_t size, cmp_fn cmp)
{
    char *p = base;
    for (size_t i = 1; i < count; ++i)
        for (size_t j = i; j > 0 && cmp(p + (j - 1) * size, p + j * size) > 0; --j)
            swap(p + (j - 1) * size, p + j * size, size);
}

int compare_ints(const void *a, const void *b)
{
    int x = *(const int *)a, y = *(const int *)b;
    return (x > y) - (x < y);
}
