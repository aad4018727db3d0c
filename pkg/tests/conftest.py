from hypothesis import settings

settings.register_profile('default', deadline=None)
settings.load_profile('default')

# criterion number -> (PASS|FAIL, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section('acceptance criteria')
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        tr.write_line('criterion %d: %s  %s' % (n, status, detail))
