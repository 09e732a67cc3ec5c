/* Minimal CPython extension exposing the x86 cycle counter.
 *
 * Compiled on demand by silt.clock (a ctypes binding would add hundreds of
 * nanoseconds per call and distort the read-overhead comparison). The fenced
 * variant serializes the read against surrounding instructions with lfence
 * on both sides; the plain variant is provided for comparison runs.
 */
#define PY_SSIZE_T_CLEAN
#include <Python.h>
#include <stdint.h>

#if defined(__x86_64__) || defined(__i386__)
#include <x86intrin.h>

static PyObject *
read_fenced(PyObject *self, PyObject *noargs)
{
    uint64_t ticks;
    _mm_lfence();
    ticks = __rdtsc();
    _mm_lfence();
    return PyLong_FromUnsignedLongLong(ticks);
}

static PyObject *
read_plain(PyObject *self, PyObject *noargs)
{
    return PyLong_FromUnsignedLongLong(__rdtsc());
}

#else

static PyObject *
read_fenced(PyObject *self, PyObject *noargs)
{
    PyErr_SetString(PyExc_OSError, "cycle counter requires an x86 CPU");
    return NULL;
}

static PyObject *
read_plain(PyObject *self, PyObject *noargs)
{
    PyErr_SetString(PyExc_OSError, "cycle counter requires an x86 CPU");
    return NULL;
}

#endif

static PyMethodDef methods[] = {
    {"read_fenced", read_fenced, METH_NOARGS, "Serialized cycle counter read."},
    {"read_plain", read_plain, METH_NOARGS, "Unserialized cycle counter read."},
    {NULL, NULL, 0, NULL},
};

static struct PyModuleDef moduledef = {
    PyModuleDef_HEAD_INIT, "_cyclecounter", NULL, -1, methods,
};

PyMODINIT_FUNC
PyInit__cyclecounter(void)
{
    return PyModule_Create(&moduledef);
}
