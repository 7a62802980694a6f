from mimetic_ops.cli import main

main()
