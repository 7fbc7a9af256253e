#include <stdlib.h>
#include <string.h>

#include "inventory.h"

int buffer_init(struct buffer *b, size_t capacity)
{
    b->data = malloc(capacity);
    if (b->data == NULL)
        return -1;
    b->len = 0;
    b->cap = capacity;
    return 0;
}

/* Appends bytes, growing geometrically; fails instead of overflowing. */
int buffer_append(struct buffer *b, const void *src, size_t n)
{
    if (n > SIZE_MAX - b->len)
        return -1;
    if (b->len + n > b->cap) {
        size_t cap = b->cap ? b->cap : 64;
        while (cap < b->len + n) {
            if (cap > SIZE_MAX / 2)
                return -1;
            cap *= 2;
        }
        void *grown = realloc(b->data, cap);
        if (grown == NULL)
            return -1;
        b->data = grown;
        b->cap = cap;
    }
    memcpy((char *)b->data + b->len, src, n);
    b->len += n;
    return 0;
}

void buffer_free(struct buffer *b)
{
    free(b->data);
    b->data = NULL;
    b->len = b->cap = 0;
}
