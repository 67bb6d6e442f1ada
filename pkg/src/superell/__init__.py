# superell package
