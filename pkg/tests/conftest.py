# anchors pytest's rootdir and puts this directory on sys.path so the
# shared oracles module is importable from every test file
