#include <stdio.h>
#include "util.h"

/* a comment with braces { } that must not confuse the scanner */
static int counter = 0;

int add(int a, int b)
{
    return a + b;
}

static const char *greeting(void)
{
    const char *s = "}{ not a brace";
    return s;
}

void tick(struct state *st) {
    if (st->on) {
        counter++;
    }
    st->last = counter;
}
